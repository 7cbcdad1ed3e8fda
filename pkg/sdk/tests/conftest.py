from tests.conftest import live_arena_factory  # noqa: F401
