"""Non-symmetric polarization laboratory."""
