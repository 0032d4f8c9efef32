"""Tests for odesr.export modules."""
