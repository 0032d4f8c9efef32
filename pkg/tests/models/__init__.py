"""Tests for odesr.models modules."""
