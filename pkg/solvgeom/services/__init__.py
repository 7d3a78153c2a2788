# =============================================================================
# SERVICES PACKAGE
# =============================================================================
# One module per geometry area plus the campaign and report services that
# drive them from the management commands.
# =============================================================================
