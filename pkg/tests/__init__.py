"""Test suite for the stochastic LMO lab."""
