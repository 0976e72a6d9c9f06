"""Command registry. All commands auto-register via the register_command decorator."""

COMMAND_REGISTRY = []


def register_command(cls):
    """Decorator to register a command class in the global registry."""
    COMMAND_REGISTRY.append(cls)
    return cls
