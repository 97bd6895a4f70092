"""Integration tests for py-morphgrasp."""
