import threading
from typing import Callable, Hashable


class MemoStore:
    """Keyed memo shared across threads; values are computed outside the lock and the first one stored wins"""

    def __init__(self):
        self._lock = threading.Lock()
        self._values = {}

    def get(self, key: Hashable, compute: Callable):
        with self._lock:
            if key in self._values:
                return self._values[key]
        value = compute()
        with self._lock:
            return self._values.setdefault(key, value)

    def put(self, key: Hashable, value):
        with self._lock:
            self._values[key] = value
        return value

    def discard(self, predicate: Callable = None):
        """Drop every key matching predicate, or everything"""
        with self._lock:
            if predicate is None:
                self._values.clear()
                return
            for key in [k for k in self._values if predicate(k)]:
                del self._values[key]

    def __contains__(self, key):
        with self._lock:
            return key in self._values

    def __len__(self):
        with self._lock:
            return len(self._values)
