"""Tests for odesr.sensitivity modules."""
