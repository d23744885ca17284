"""Gradually typed effect handlers: a surface language that elaborates into
a cast calculus, a frame-stack machine for the cast calculus, and an
executable conformance suite for the metatheory."""

__version__ = "0.1.0"
