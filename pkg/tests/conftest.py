import numpy as np
import pytest

from datarena.dataset import Dataset
from datarena.forge import ForgeSpec


def build_dataset(X, y, classes=None, ids=None, id="d"):
    X = np.asarray(X, dtype=np.float64)
    classes = classes or [f"class_{i}" for i in range(int(np.max(y)) + 1)]
    ids = ids or [f"e{i:04d}" for i in range(len(X))]
    return Dataset.build(id, X.shape[1], classes, ids, X, y)


@pytest.fixture
def small_spec():
    # small but non-trivial: 3 classes x 30 examples, 4 dims
    return ForgeSpec(seed=11, num_classes=3, per_class_count=30, dim=4,
                     cluster_spread=0.5)


@pytest.fixture
def default_spec():
    return ForgeSpec(seed=0)


@pytest.fixture(scope="session")
def live_arena_factory():
    """Start a real arena HTTP server on a free port; yields a factory
    taking a data root and returning (base_url, arena)."""
    import socket
    import threading
    import time

    import uvicorn

    from datarena.arena import Arena, create_app

    servers = []

    def start(data_root):
        arena = Arena(data_root)
        with socket.socket() as s:
            s.bind(("127.0.0.1", 0))
            port = s.getsockname()[1]
        config = uvicorn.Config(create_app(arena), host="127.0.0.1",
                                port=port, log_level="error")
        server = uvicorn.Server(config)
        thread = threading.Thread(target=server.run, daemon=True)
        thread.start()
        deadline = time.monotonic() + 10
        while not server.started:
            if time.monotonic() > deadline:
                raise RuntimeError("arena server failed to start")
            time.sleep(0.02)
        servers.append((server, thread))
        return f"http://127.0.0.1:{port}", arena

    yield start
    for server, thread in servers:
        server.should_exit = True
        thread.join(timeout=5)
