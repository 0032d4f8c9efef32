"""Tests for odesr.solver modules."""
