"""Serverless platform measurement harness and FaaS platform simulator."""

__version__ = "0.1.0"
