"""Tests for odesr.training modules."""
