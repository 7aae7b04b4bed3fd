"""Koopman message-passing autoencoders for network dynamics."""

__version__ = "0.1.0"
