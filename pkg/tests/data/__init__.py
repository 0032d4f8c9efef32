"""Tests for odesr.data modules."""
