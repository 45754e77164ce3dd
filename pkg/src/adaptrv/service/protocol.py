"""Line-oriented command protocol over stdin/stdout (or any text stream).

One request per line, one response per line, strictly ordered.  Responses
are ``OK <json>`` or ``ERR <code> <json>``; a malformed command yields an
ERR line, never a crash.

    LOAD <structured-english requirement>
    LOAD FILE <path>
    EVENT <timestamp_ms> <event_type>       (wall mode also: EVENT <event_type>)
    ADAPT <session> UPDATE_GUARD <ms> [<index>|all]
    ADAPT <session> UPDATE_EVENT <old> <new>
    ADAPT <session> ADD_RESPONSE <event> <ms>
    ADAPT <session> REMOVE_RESPONSE <index>
    ADAPT <session> SPLIT
    STATE <session>
    VERDICT <session>
    SAVE <session> <path>
    DELETE <session>
"""

from __future__ import annotations

import json
import sys
from pathlib import Path
from typing import IO, Optional

from .. import pap
from ..errors import AdaptRvError
from .manager import SessionManager, TIME_WALL


def _ok(payload: dict) -> str:
    return "OK " + json.dumps(payload, ensure_ascii=False)


def _err(code: str, message: str) -> str:
    return f"ERR {code} " + json.dumps({"message": message}, ensure_ascii=False)


def parse_adaptation(words: list[str]) -> pap.AdaptationRule:
    """ADAPT argument syntax shared by the console and the thin client."""
    if not words:
        raise AdaptRvError("missing adaptation kind")
    kind, args = words[0].upper(), words[1:]
    if kind == "UPDATE_GUARD":
        if len(args) not in (1, 2):
            raise AdaptRvError("usage: UPDATE_GUARD <ms> [<index>|all]")
        which: int | str = "all"
        if len(args) == 2 and args[1].lower() != "all":
            which = int(args[1])
        return pap.update_time_guard_rule(int(args[0]), which=which)
    if kind == "UPDATE_EVENT":
        if len(args) != 2:
            raise AdaptRvError("usage: UPDATE_EVENT <old> <new>")
        return pap.update_event_rule(args[0], args[1])
    if kind == "ADD_RESPONSE":
        if len(args) != 2:
            raise AdaptRvError("usage: ADD_RESPONSE <event> <ms>")
        return pap.add_response_rule(args[0], int(args[1]))
    if kind == "REMOVE_RESPONSE":
        if len(args) != 1:
            raise AdaptRvError("usage: REMOVE_RESPONSE <index>")
        return pap.remove_response_rule(int(args[0]))
    if kind == "SPLIT":
        if args:
            raise AdaptRvError("usage: SPLIT")
        return pap.split_chain_rule()
    raise AdaptRvError(f"unknown adaptation kind {kind!r}")


class ControlProtocol:
    def __init__(self, manager: SessionManager):
        self.manager = manager

    def handle_line(self, line: str) -> str:
        try:
            return self._dispatch(line.strip())
        except AdaptRvError as exc:
            return _err(exc.code, str(exc))
        except (ValueError, KeyError, OSError) as exc:
            return _err("bad-command", str(exc))

    def _dispatch(self, line: str) -> str:
        if not line:
            return _err("bad-command", "empty command")
        words = line.split()
        cmd = words[0].upper()
        if cmd == "LOAD":
            if len(words) >= 3 and words[1].upper() == "FILE":
                doc = json.loads(Path(" ".join(words[2:])).read_text())
                return _ok(self.manager.restore(doc))
            text = line[len(words[0]):].strip()
            if not text:
                return _err("bad-command", "LOAD needs a requirement")
            return _ok(self.manager.load_requirement(text))
        if cmd == "EVENT":
            if len(words) == 3:
                return _ok(self.manager.submit_event(words[2], int(words[1])))
            if len(words) == 2 and self.manager.config.time_mode == TIME_WALL:
                return _ok(self.manager.submit_event(words[1], None))
            return _err("bad-command", "usage: EVENT <timestamp_ms> <event_type>")
        if cmd == "ADAPT":
            if len(words) < 3:
                return _err("bad-command", "usage: ADAPT <session> <rule...>")
            rule = parse_adaptation(words[2:])
            return _ok(self.manager.adapt(int(words[1]), rule))
        if cmd == "STATE":
            return _ok(self.manager.describe(int(words[1])))
        if cmd == "VERDICT":
            return _ok(self.manager.verdict(int(words[1])))
        if cmd == "SAVE":
            if len(words) < 3:
                return _err("bad-command", "usage: SAVE <session> <path>")
            return _ok(self.manager.save(int(words[1]), " ".join(words[2:])))
        if cmd == "DELETE":
            self.manager.delete(int(words[1]))
            return _ok({"id": int(words[1]), "deleted": True})
        return _err("bad-command", f"unknown command {cmd!r}")


def stdio_loop(
    manager: SessionManager,
    stdin: Optional[IO[str]] = None,
    stdout: Optional[IO[str]] = None,
) -> None:
    """Serve the protocol until end of input."""
    protocol = ControlProtocol(manager)
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    for line in stdin:
        stdout.write(protocol.handle_line(line) + "\n")
        stdout.flush()
