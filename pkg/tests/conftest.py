import pytest

from wrap_forge.mock_server import MockEndpoint
from wrap_forge.wire import EndpointConfig


@pytest.fixture
def mock_endpoint():
    """Factory for mock servers; stops every started instance at teardown."""
    started = []

    def make(mode: str = "echo", **kwargs) -> MockEndpoint:
        server = MockEndpoint(mode, **kwargs).start()
        started.append(server)
        return server

    yield make
    for server in started:
        server.stop()


@pytest.fixture
def echo_server(mock_endpoint):
    return mock_endpoint("echo")


def fast_cfg(server, **overrides) -> EndpointConfig:
    defaults = dict(
        base_url=server.base_url,
        model_id="mock-model",
        timeout=10.0,
        retry_backoff=0.01,
    )
    defaults.update(overrides)
    return EndpointConfig(**defaults)
