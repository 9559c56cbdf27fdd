"""QoS certainty simulator tests."""
