"""Runtime check collector and pytest plugin for instrumented programs."""

import contextvars
import json
import os
import sys

SINK_ENV = "CBFL_VIOLATIONS"

_context = contextvars.ContextVar("cbfl_context", default=None)


class TestContext:
    def __init__(self, test_id):
        self.test_id = test_id
        self.records = []
        self.snapshots = {}
        self.tracked = {}


class _Failed:
    def __init__(self, err):
        self.err = err


_orphan = TestContext(None)


def _current():
    ctx = _context.get()
    return ctx if ctx is not None else _orphan


def _describe(exc):
    return "%s: %s" % (type(exc).__name__, exc)


def check(cid, thunk):
    line = sys._getframe(1).f_lineno
    err = None
    try:
        verdict = "satisfied" if thunk() else "violated"
    except Exception as exc:
        verdict = "eval_error"
        err = _describe(exc)
    ctx = _context.get()
    if ctx is not None:
        ctx.records.append({"kind": "check", "test_id": ctx.test_id, "cid": cid,
                            "verdict": verdict, "line": line, "err": err})
    return None


def snapshot(cid, thunk):
    try:
        value = thunk()
    except Exception as exc:
        value = _Failed(_describe(exc))
    _current().snapshots[cid] = value
    return None


def snapshot_of(cid):
    value = _current().snapshots[cid]
    if isinstance(value, _Failed):
        raise RuntimeError("snapshot failed: " + value.err)
    return value


def track(cid, thunk):
    try:
        value = bool(thunk())
    except Exception as exc:
        value = _Failed(_describe(exc))
    _current().tracked.setdefault(cid, []).append(value)
    return None


def tracked(cid):
    values = _current().tracked.get(cid, [])
    for value in values:
        if isinstance(value, _Failed):
            raise RuntimeError("tracked value failed: " + value.err)
    return all(values)


_sink_fd = None


def _emit(record):
    global _sink_fd
    if _sink_fd is None:
        path = os.environ.get(SINK_ENV)
        if not path:
            raise RuntimeError(SINK_ENV + " is not set")
        _sink_fd = os.open(path, os.O_WRONLY | os.O_APPEND | os.O_CREAT, 0o644)
    os.write(_sink_fd, (json.dumps(record) + "\n").encode("utf-8"))


try:
    import pytest
except ImportError:
    pytest = None

if pytest is not None:

    def pytest_configure(config):
        if not os.environ.get(SINK_ENV):
            raise pytest.UsageError(SINK_ENV + " must name the JSONL sink")

    @pytest.hookimpl(hookwrapper=True)
    def pytest_runtest_protocol(item, nextitem):
        ctx = TestContext(item.nodeid)
        item._cbfl_passed = True
        token = _context.set(ctx)
        try:
            yield
        finally:
            _context.reset(token)
            for record in ctx.records:
                _emit(record)
            _emit({"kind": "outcome", "test_id": item.nodeid, "passed": item._cbfl_passed})

    @pytest.hookimpl(hookwrapper=True)
    def pytest_runtest_makereport(item, call):
        outcome = yield
        if outcome.get_result().failed:
            item._cbfl_passed = False
