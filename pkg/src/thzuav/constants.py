"""Physical constants shared across modules."""

# Exact SI value, m/s.
SPEED_OF_LIGHT = 299792458.0
