from concurrent.futures import ThreadPoolExecutor

import pytest

from utils.memo import MemoStore


def test_memo_computes_once_per_key():
    store = MemoStore()
    calls = []
    first = store.get("a", lambda: calls.append("a") or ["value"])
    assert store.get("a", lambda: calls.append("again") or ["other"]) is first
    assert calls == ["a"]
    assert "a" in store and len(store) == 1


def test_memo_threads_share_one_value():
    store = MemoStore()
    with ThreadPoolExecutor(max_workers=8) as pool:
        values = list(pool.map(lambda k: store.get("key", lambda: object()), range(64)))
    assert all(v is values[0] for v in values)


def test_memo_keeps_nothing_on_failure():
    store = MemoStore()

    def boom():
        raise ValueError("no value")
    with pytest.raises(ValueError):
        store.get("k", boom)
    assert "k" not in store


def test_memo_discard():
    store = MemoStore()
    for key in [(1, "x"), (1, "y"), (2, "x")]:
        store.put(key, key)
    store.discard(lambda k: k[0] == 1)
    assert len(store) == 1 and (2, "x") in store
    store.discard()
    assert len(store) == 0
