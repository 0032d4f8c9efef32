# Tests for odesr
