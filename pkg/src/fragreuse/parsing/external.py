"""Run a third-party parser through a file-in/file-out subprocess contract."""

from __future__ import annotations

import os
import shlex
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..conllu import ConlluError, Treebank, read_conllu, write_conllu


class BridgeError(RuntimeError):
    """The external parser failed or returned output that does not line up."""

    def __init__(self, message: str, stderr: str = ""):
        self.stderr = stderr
        if stderr:
            message = f"{message}\n--- parser stderr ---\n{stderr.strip()}"
        super().__init__(message)


@dataclass(frozen=True)
class ExternalParserSpec:
    """``command`` is a template with ``{input}``, ``{output}`` and optional ``{model}`` placeholders."""

    command: str
    model: Optional[str] = None
    timeout: Optional[float] = None
    workdir: Optional[str] = None
    env: dict = field(default_factory=dict, hash=False)

    def argv(self, input_path: Path, output_path: Path) -> list[str]:
        values = {"input": str(input_path), "output": str(output_path), "model": self.model or ""}
        return [part.format(**values) for part in shlex.split(self.command)]

    @classmethod
    def from_dict(cls, data: dict) -> "ExternalParserSpec":
        return cls(
            command=data["command"],
            model=data.get("model"),
            timeout=data.get("timeout"),
            workdir=data.get("workdir"),
            env=dict(data.get("env", {})),
        )


def check_alignment(parsed: Treebank, expected: Treebank) -> None:
    if len(parsed) != len(expected):
        raise BridgeError(f"parser returned {len(parsed)} sentences, expected {len(expected)}")
    for idx, (out, inp) in enumerate(zip(parsed, expected)):
        if [t.form for t in out.tokens] != [t.form for t in inp.tokens]:
            name = inp.sent_id or f"#{idx}"
            raise BridgeError(f"sentence {name}: parser changed the tokenization")


def run_external(spec: ExternalParserSpec, treebank: Treebank) -> tuple[Treebank, float]:
    """Parse ``treebank`` with the external command; time covers the subprocess only."""
    with tempfile.TemporaryDirectory(prefix="fragreuse-") as tmp:
        in_path = Path(tmp) / "input.conllu"
        out_path = Path(tmp) / "output.conllu"
        write_conllu(treebank, in_path)
        argv = spec.argv(in_path, out_path)
        env = {**os.environ, **spec.env} if spec.env else None
        start = time.perf_counter()
        try:
            proc = subprocess.run(
                argv,
                cwd=spec.workdir,
                env=env,
                capture_output=True,
                text=True,
                timeout=spec.timeout,
            )
        except subprocess.TimeoutExpired as exc:
            raise BridgeError(f"parser timed out after {spec.timeout}s", str(exc.stderr or "")) from None
        except OSError as exc:
            raise BridgeError(f"cannot run parser command {argv[0]!r}: {exc}") from None
        elapsed = time.perf_counter() - start
        if proc.returncode != 0:
            raise BridgeError(f"parser exited with status {proc.returncode}", proc.stderr)
        if not out_path.exists():
            raise BridgeError("parser produced no output file", proc.stderr)
        try:
            parsed = read_conllu(out_path, validate=False)
        except ConlluError as exc:
            raise BridgeError(f"unreadable parser output: {exc}", proc.stderr) from None
    check_alignment(parsed, treebank)
    return parsed, elapsed
