"""Unit tests for the QoS certainty simulator."""
