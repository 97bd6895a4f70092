"""Unit tests for py-morphgrasp."""
