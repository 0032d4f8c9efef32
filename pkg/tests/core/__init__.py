"""Tests for odesr.core modules."""
