import threading

import pytest

from pyGOAT.exceptions import ConfigError
from pyGOAT.Stereo_Matching.util import parallel_map, thread_count


@pytest.mark.parametrize('threads', [1, 4])
def test_parallel_map_keeps_order(threads):
    assert parallel_map(lambda x: x * x, range(20), threads) == [x * x for x in range(20)]


def test_parallel_map_uses_several_threads():
    seen = set()
    barrier = threading.Barrier(2, timeout=5)

    def record(_):
        seen.add(threading.get_ident())
        barrier.wait()

    parallel_map(record, range(2), threads=2)
    assert len(seen) == 2


def test_errors_propagate():
    def fail(x):
        raise ValueError(x)

    with pytest.raises(ValueError):
        parallel_map(fail, [1, 2], threads=2)


def test_thread_count_sources(monkeypatch):
    monkeypatch.setenv('GOAT_THREADS', '3')
    assert thread_count() == 3
    assert thread_count(5) == 5
    monkeypatch.setenv('GOAT_THREADS', 'lots')
    with pytest.raises(ConfigError):
        thread_count()
    monkeypatch.delenv('GOAT_THREADS')
    assert thread_count() >= 1
