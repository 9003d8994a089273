"""Shared test utilities: network guard and the fixture-bundle pipeline runner."""

from __future__ import annotations

import contextlib
import io
import os
import socket
from pathlib import Path

FIXTURES = Path(__file__).parent / "fixtures"
BUNDLE = FIXTURES / "bundle"

NETWORK_ATTEMPTS: list[tuple] = []
ACCEPTANCE_RESULTS: list[str] = []
_originals: dict[str, object] = {}


class NetworkBlocked(RuntimeError):
    pass


def block_network() -> None:
    """Make every socket connect or DNS lookup fail loudly and record it."""
    if _originals:
        return

    def connect(self, address, *args, **kwargs):
        NETWORK_ATTEMPTS.append(("connect", address))
        raise NetworkBlocked(f"network access attempted: {address!r}")

    def getaddrinfo(host, *args, **kwargs):
        NETWORK_ATTEMPTS.append(("getaddrinfo", host))
        raise NetworkBlocked(f"DNS lookup attempted: {host!r}")

    _originals["connect"] = socket.socket.connect
    _originals["connect_ex"] = socket.socket.connect_ex
    _originals["getaddrinfo"] = socket.getaddrinfo
    socket.socket.connect = connect
    socket.socket.connect_ex = connect
    socket.getaddrinfo = getaddrinfo


def unblock_network() -> None:
    if not _originals:
        return
    socket.socket.connect = _originals.pop("connect")
    socket.socket.connect_ex = _originals.pop("connect_ex")
    socket.getaddrinfo = _originals.pop("getaddrinfo")


def cli(*argv: str, env: dict[str, str] | None = None) -> tuple[int, str]:
    """Run the CLI in-process; returns (exit code, stdout)."""
    from policylens.cli import main

    saved = {k: os.environ.get(k) for k in (env or {})}
    os.environ.update(env or {})
    buf = io.BytesIO()
    wrapper = io.TextIOWrapper(buf, encoding="utf-8")
    try:
        with contextlib.redirect_stdout(wrapper):
            code = main(list(argv))
        wrapper.flush()
    finally:
        for k, v in saved.items():
            if v is None:
                os.environ.pop(k, None)
            else:
                os.environ[k] = v
    return code, buf.getvalue().decode("utf-8")


def run_pipeline(workdir: Path, seed: int = 7) -> Path:
    """Run every pipeline stage on the fixture bundle; returns the output directory."""
    from policylens.corpus import make_id, open_store

    workdir = Path(workdir).resolve()
    config = str(BUNDLE / "config.toml")
    store = workdir / "store"
    out = workdir / "out"
    common = ("--config", config, "--store", str(store), "--seed", str(seed))
    model = out / "models" / "ambiguity.json"
    codes = {}
    codes["train"], _ = cli(*common, "train", "--task", "ambiguity",
                            "--dataset", str(FIXTURES / "models" / "ambiguity.csv"), "--out", str(model))
    for verb in ("discover", "fetch-policies", "archive"):
        codes[verb], _ = cli(*common, verb)
    env = {"POLICYLENS_MODELS_AMBIGUITY": str(model)}
    codes["analyze"], _ = cli(*common, "analyze", "--out", str(out / "reports"), env=env)
    codes["matrix"], _ = cli(*common, "matrix", "--format", "csv", "--out", str(out / "matrix.csv"))
    codes["cluster"], _ = cli(*common, "cluster", "--out", str(out / "cluster.json"))
    st = open_store(store)
    lumora = next(m for m in st.list("manufacturers") if m.name == "Lumora")
    archived = sorted((d for d in st.list("policies") if d.manufacturer_id == lumora.id and d.kind == "archived"),
                      key=lambda d: d.snapshot_date)
    codes["diff"], _ = cli(*common, "diff", archived[0].id, make_id(lumora.id, "current"),
                           "--out", str(out / "diff.json"))
    for kind in ("products", "manufacturers", "policies", "reports"):
        codes[f"export {kind}"], _ = cli(*common, "export", kind, "--out", str(out / f"{kind}.json"))
    (out / "exit_codes.txt").write_text("".join(f"{k} {v}\n" for k, v in sorted(codes.items())), encoding="utf-8")
    return out


def tree_bytes(root: Path) -> dict[str, bytes]:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}
