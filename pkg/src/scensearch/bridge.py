"""Bridge to external simulators over newline-delimited JSON.

One request object per line on the child's stdin, one response object per
line on its stdout; requests and responses are matched by ``id`` so the
child may answer out of order.  Each worker thread gets its own child
process; instances are therefore safe to use from a thread pool but a
single simulate call never interleaves two children.
"""
from __future__ import annotations

import json
import queue
import subprocess
import threading
import time

import numpy as np

from .scenario import ScenarioSpec, TestInput
from .simulation import SimulationError, SimulationOutput, validate_output

DEFAULT_TIMEOUT = 60.0


class _Child:
    """One running child process with a background stdout reader."""

    def __init__(self, command: list[str]):
        self.proc = subprocess.Popen(
            command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            text=True, bufsize=1)
        self.lines: queue.Queue = queue.Queue()
        self.pending: dict[int, dict] = {}
        self.next_id = 0
        self.reader = threading.Thread(target=self._read, daemon=True)
        self.reader.start()

    def _read(self):
        assert self.proc.stdout is not None
        try:
            for line in self.proc.stdout:
                self.lines.put(line)
        except (ValueError, OSError):
            pass  # stream closed under the reader during shutdown
        self.lines.put(None)  # EOF marker

    def alive(self) -> bool:
        return self.proc.poll() is None

    def request(self, payload: dict, timeout: float) -> dict:
        msg_id = self.next_id
        self.next_id += 1
        payload = dict(payload, id=msg_id)
        try:
            assert self.proc.stdin is not None
            self.proc.stdin.write(json.dumps(payload) + "\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise SimulationError("backend terminated before accepting request",
                                  details=str(exc)) from exc

        deadline = time.monotonic() + timeout
        while True:
            if msg_id in self.pending:
                return self.pending.pop(msg_id)
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise SimulationError(f"backend timeout after {timeout} s")
            try:
                line = self.lines.get(timeout=min(remaining, 0.5))
            except queue.Empty:
                continue
            if line is None:
                raise SimulationError("backend terminated before responding")
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SimulationError("malformed response: not valid JSON",
                                      details=line[:500]) from exc
            if not isinstance(obj, dict) or "id" not in obj:
                raise SimulationError("malformed response: missing id",
                                      details=line[:500])
            if obj["id"] == msg_id:
                return obj
            self.pending[obj["id"]] = obj

    def close(self):
        for stream in (self.proc.stdin, self.proc.stdout):
            try:
                if stream:
                    stream.close()
            except OSError:
                pass
        if self.alive():
            self.proc.terminate()
            try:
                self.proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self.proc.kill()


class SubprocessSimulator:
    """Simulator backend that shells out to an external command.

    The command is started lazily, once per worker thread.  Searched
    variables and fixed settings are passed by name in the request's
    ``parameters`` object.
    """

    name = "subprocess"

    def __init__(self, command: list[str], dt: float = 0.01,
                 timeout: float = DEFAULT_TIMEOUT):
        if not command:
            raise ValueError("bridge needs a child command")
        self.command = list(command)
        self.dt = dt
        self.timeout = timeout
        self._local = threading.local()
        self._children: list[_Child] = []
        self._lock = threading.Lock()

    def _child(self) -> _Child:
        child = getattr(self._local, "child", None)
        if child is None or not child.alive():
            child = _Child(self.command)
            self._local.child = child
            with self._lock:
                self._children.append(child)
        return child

    def build_request(self, spec: ScenarioSpec, test_input: TestInput,
                      seed: int) -> dict:
        parameters = dict(spec.fixed_settings)
        parameters.update(zip(spec.names, (float(v) for v in test_input)))
        return {
            "scenario": spec.scenario_path,
            "parameters": parameters,
            "dt": self.dt,
            "seed": seed,
        }

    def parse_response(self, obj: dict, test_input=None) -> SimulationOutput:
        try:
            actors_raw = obj["actors"]
            dt = float(obj["dt"])
            rows = {name: np.asarray(val, dtype=float)
                    for name, val in actors_raw.items()}
        except (KeyError, TypeError, ValueError) as exc:
            raise SimulationError("malformed response: bad schema",
                                  test_input=test_input, details=str(exc)) from exc
        lengths = {name: arr.shape[0] if arr.ndim == 2 else -1
                   for name, arr in rows.items()}
        if not rows or any(arr.ndim != 2 or arr.shape[1] != 5 for arr in rows.values()):
            raise SimulationError("malformed response: actor rows must be [t,x,y,yaw,speed]",
                                  test_input=test_input)
        if len(set(lengths.values())) > 1:
            raise SimulationError(f"inconsistent trajectory lengths: {lengths}",
                                  test_input=test_input)
        # normalize the time column onto the canonical k*dt grid
        k = next(iter(lengths.values()))
        grid = np.arange(k) * dt
        actors = {}
        for name, arr in rows.items():
            arr = arr.copy()
            arr[:, 0] = grid
            actors[name] = arr
        output = SimulationOutput(
            dt=dt, actors=actors,
            collision=bool(obj.get("collision", False)),
            collision_time=None if obj.get("collision_time") is None
            else float(obj["collision_time"]),
            metadata={str(k2): str(v) for k2, v in obj.get("metadata", {}).items()},
        )
        problems = validate_output(output)
        if problems:
            raise SimulationError("invalid simulation output: " + "; ".join(problems),
                                  test_input=test_input)
        return output

    def simulate(self, spec: ScenarioSpec, test_input: TestInput,
                 seed: int = 0) -> SimulationOutput:
        child = self._child()
        try:
            response = child.request(self.build_request(spec, test_input, seed),
                                     self.timeout)
        except SimulationError as exc:
            raise SimulationError(str(exc), test_input=test_input,
                                  details=exc.details) from exc
        return self.parse_response(response, test_input=test_input)

    def close(self):
        with self._lock:
            children, self._children = self._children, []
        for child in children:
            child.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()
