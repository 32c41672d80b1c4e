"""Operator entry point: serve the API, replay scripts, or chat in a terminal.

Scripted runs drive the full loop (release due snippets, analyse the user
line, run the turn, render the reply) and print one transcript block per
turn.  The same dialogue can be replayed against a golden transcript and,
under --over-http, through a real HTTP round trip; both paths must produce
byte-identical output.

Exit codes: 0 success, 1 transcript mismatch, 2 script or preset errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import difflib
import http.client
import json
import sys
import threading
from dataclasses import dataclass
from pathlib import Path

from . import sim, wire
from .server import make_server
from .sim import DomainPreset, PresetError, ki_release, nlg, nlu
from .wire import AgendaDocument, SessionService, SnippetDocument, UserInputDocument


class ScriptError(ValueError):
    pass


class ServiceError(RuntimeError):
    """An HTTP endpoint answered with an error status."""

    def __init__(self, status: int, payload: dict):
        super().__init__(f"{status}: {payload.get('error')}: {payload.get('reason')}")
        self.status = status
        self.payload = payload


# ---------------------------------------------------------------------------
# Script files
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScriptStep:
    text: str
    semantic: UserInputDocument | None = None

    @property
    def is_bye(self) -> bool:
        if self.semantic is not None:
            return self.semantic.dialogue_action == "bye"
        return self.text.strip().lower() == "bye"


@dataclass(frozen=True)
class ScriptFile:
    preset: str
    steps: tuple[ScriptStep, ...]


def load_script(path: str | Path) -> ScriptFile:
    """Parse a script: a preset line, then one user step per line.

    Blank lines and lines starting with # are skipped.  A step is either
    plain user text or "@semantic {json}" carrying a raw user input document.
    A bye step must be the last step.
    """
    path = Path(path)
    try:
        raw_lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ScriptError(f"{path}: {exc}") from exc
    lines = [ln for ln in raw_lines if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ScriptError(f"{path}: empty script")
    header = lines[0]
    if not header.startswith("preset:"):
        raise ScriptError(f"{path}: first line must be 'preset: <name>'")
    preset = header[len("preset:") :].strip()
    if not preset:
        raise ScriptError(f"{path}: preset name is empty")
    steps = []
    for ln in lines[1:]:
        if ln.startswith("@semantic"):
            payload = ln[len("@semantic") :].strip()
            try:
                doc = wire.decode_user_input_document(json.loads(payload))
            except (json.JSONDecodeError, wire.MalformedDocument) as exc:
                raise ScriptError(f"{path}: bad @semantic step: {exc}") from exc
            steps.append(ScriptStep(ln, doc))
        else:
            steps.append(ScriptStep(ln))
    if not steps:
        raise ScriptError(f"{path}: script has no user steps")
    for step in steps[:-1]:
        if step.is_bye:
            raise ScriptError(f"{path}: no steps may follow 'bye'")
    return ScriptFile(preset, tuple(steps))


# ---------------------------------------------------------------------------
# Drivers: the same operations in-process or over HTTP
# ---------------------------------------------------------------------------


class InProcessDriver:
    def __init__(self, service: SessionService):
        self.service = service

    def create_session(self, preset: str) -> str:
        return self.service.post_session(preset)

    def post_snippets(self, session_id: str, docs: list[SnippetDocument]) -> list[str]:
        return self.service.post_snippets(session_id, docs)

    def post_turn(self, session_id: str, doc: UserInputDocument | None) -> AgendaDocument:
        return self.service.post_turn(session_id, doc)

    def get_workspace(self, session_id: str) -> dict:
        return self.service.get_workspace(session_id)

    def close(self) -> None:
        pass


class HttpDriver:
    def __init__(self, host: str, port: int):
        self.conn = http.client.HTTPConnection(host, port, timeout=30)

    def _request(self, method: str, path: str, obj=None) -> dict:
        body = None if obj is None else wire.encode_document(obj).encode("utf-8")
        headers = {"Content-Type": "application/json"} if body else {}
        self.conn.request(method, path, body=body, headers=headers)
        response = self.conn.getresponse()
        payload = json.loads(response.read().decode("utf-8"))
        if response.status >= 400:
            raise ServiceError(response.status, payload)
        return payload

    def create_session(self, preset: str) -> str:
        return self._request("POST", "/sessions", {"preset": preset})["session_id"]

    def post_snippets(self, session_id: str, docs: list[SnippetDocument]) -> list[str]:
        payload = self._request(
            "POST", f"/sessions/{session_id}/snippets", [d.to_obj() for d in docs]
        )
        return payload["agenda_ids"]

    def post_turn(self, session_id: str, doc: UserInputDocument | None) -> AgendaDocument:
        payload = self._request(
            "POST", f"/sessions/{session_id}/turn", None if doc is None else doc.to_obj()
        )
        return wire.decode_agenda_document(payload)

    def get_workspace(self, session_id: str) -> dict:
        return self._request("GET", f"/sessions/{session_id}/workspace")

    def close(self) -> None:
        self.conn.close()


# ---------------------------------------------------------------------------
# The dialogue loop
# ---------------------------------------------------------------------------


def run_loop_turn(driver, preset: DomainPreset, session_id: str, turn: int, step: ScriptStep | None) -> tuple[AgendaDocument, str]:
    """One loop iteration: snippet release, analysis, turn, rendering."""
    released = ki_release(preset, turn, session_id)
    if released:
        driver.post_snippets(session_id, released)
    if step is None:
        doc = None
    elif step.semantic is not None:
        doc = dataclasses.replace(step.semantic, session_id=session_id)
    else:
        doc = dataclasses.replace(nlu(preset, step.text), session_id=session_id)
    agenda = driver.post_turn(session_id, doc)
    return agenda, nlg(preset, agenda)


def transcript_block(step: ScriptStep | None, agenda: AgendaDocument, text: str) -> str:
    user_line = "(none)" if step is None else step.text
    return f"USER: {user_line}\nAGENDA:\n{agenda.encode()}\nSYSTEM: {text}\n\n"


def run_script_dialogue(driver, preset: DomainPreset, script: ScriptFile) -> str:
    """Play the whole script against a fresh session; returns the transcript."""
    session_id = driver.create_session(preset.name)
    blocks = []
    agenda, text = run_loop_turn(driver, preset, session_id, 0, None)
    blocks.append(transcript_block(None, agenda, text))
    turn = 1
    for i, step in enumerate(script.steps):
        if agenda.closed:
            raise ScriptError(f"session closed before step {i + 1}")
        agenda, text = run_loop_turn(driver, preset, session_id, turn, step)
        blocks.append(transcript_block(step, agenda, text))
        turn += 1
    return "".join(blocks)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _load_presets(directory: str | Path) -> dict[str, DomainPreset]:
    return sim.load_preset_dir(directory)


def _pick_preset(presets: dict[str, DomainPreset], name: str) -> DomainPreset:
    if name not in presets:
        raise ScriptError(f"unknown preset {name!r} (have: {', '.join(sorted(presets)) or 'none'})")
    return presets[name]


def cmd_serve(args: argparse.Namespace) -> int:
    try:
        presets = _load_presets(args.presets)
        service = SessionService(presets)
        server = make_server(service, args.host, args.port)
    except (PresetError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    host, port = server.server_address[:2]
    print(
        f"serving on http://{host}:{port} (presets: {', '.join(sorted(presets)) or 'none'})",
        flush=True,
    )
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def _run_over_http(presets: dict[str, DomainPreset], preset: DomainPreset, script: ScriptFile) -> str:
    server = make_server(SessionService(presets), "127.0.0.1", 0)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    driver = HttpDriver("127.0.0.1", server.server_address[1])
    try:
        return run_script_dialogue(driver, preset, script)
    finally:
        driver.close()
        server.shutdown()
        server.server_close()
        thread.join(timeout=5)


def cmd_run_script(args: argparse.Namespace) -> int:
    try:
        presets = _load_presets(args.presets)
        script = load_script(args.script)
        preset = _pick_preset(presets, script.preset)
        if args.over_http:
            transcript = _run_over_http(presets, preset, script)
            in_process = run_script_dialogue(InProcessDriver(SessionService(presets)), preset, script)
            if transcript != in_process:
                _print_diff(in_process, transcript, "in-process", "over-http")
                print(transcript, end="")
                return 1
        else:
            transcript = run_script_dialogue(InProcessDriver(SessionService(presets)), preset, script)
    except (ScriptError, PresetError, ServiceError, wire.MalformedDocument) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(transcript, end="")
    if args.golden:
        try:
            golden = Path(args.golden).read_text(encoding="utf-8")
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        if transcript != golden:
            _print_diff(golden, transcript, args.golden, "transcript")
            return 1
    return 0


def _print_diff(expected: str, got: str, from_name: str, to_name: str) -> None:
    diff = difflib.unified_diff(
        expected.splitlines(keepends=True),
        got.splitlines(keepends=True),
        fromfile=str(from_name),
        tofile=to_name,
    )
    sys.stderr.write("".join(diff))


def cmd_chat(args: argparse.Namespace) -> int:
    try:
        presets = _load_presets(args.presets)
        preset = _pick_preset(presets, args.preset)
    except (ScriptError, PresetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    driver = InProcessDriver(SessionService(presets))
    session_id = driver.create_session(preset.name)
    agenda, text = run_loop_turn(driver, preset, session_id, 0, None)
    print(f"system> {text}")
    turn = 1
    while not agenda.closed:
        try:
            line = input("you> ")
        except EOFError:
            print()
            break
        if not line.strip():
            continue
        if line.strip() == "/workspace":
            print(wire.encode_document(driver.get_workspace(session_id)))
            continue
        agenda, text = run_loop_turn(driver, preset, session_id, turn, ScriptStep(line))
        print(f"system> {text}")
        turn += 1
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="agendadm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    default_presets = str(sim.packaged_presets_dir())

    p_serve = sub.add_parser("serve", help="run the HTTP session service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8080)
    p_serve.add_argument("--presets", default=default_presets, help="preset directory")
    p_serve.set_defaults(func=cmd_serve)

    p_run = sub.add_parser("run-script", help="replay a scripted dialogue")
    p_run.add_argument("script")
    p_run.add_argument("--presets", default=default_presets, help="preset directory")
    p_run.add_argument("--golden", help="compare the transcript against this file")
    p_run.add_argument(
        "--over-http",
        action="store_true",
        help="drive through HTTP and verify it matches the in-process run",
    )
    p_run.set_defaults(func=cmd_run_script)

    p_chat = sub.add_parser("chat", help="interactive terminal dialogue")
    p_chat.add_argument("preset")
    p_chat.add_argument("--presets", default=default_presets, help="preset directory")
    p_chat.set_defaults(func=cmd_chat)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
