"""With networking disabled, every default code path still completes."""

import json
import socket

import pytest

import synth
from taxonomy_cases import TAXONOMY_DIR
from wfsentinel.cli import EXIT_FINDINGS, EXIT_OK, main


class NetworkUsed(AssertionError):
    pass


@pytest.fixture(autouse=True)
def no_network(monkeypatch, tmp_path):
    def refuse(*a, **k):
        raise NetworkUsed("network access attempted")

    monkeypatch.setattr(socket.socket, "connect", refuse)
    monkeypatch.setattr(socket, "create_connection", refuse)
    monkeypatch.setattr(socket, "getaddrinfo", refuse)
    monkeypatch.chdir(tmp_path)


def test_guard_is_active():
    with pytest.raises(NetworkUsed):
        socket.create_connection(("example.com", 443))


def test_scan_all_formats_offline(capsys):
    for fmt in ("text", "json", "sarif"):
        assert main(["scan", str(TAXONOMY_DIR), "--profile", "permissive", "--format", fmt]) == EXIT_FINDINGS
    out = capsys.readouterr().out
    assert "kvcw.known-vulnerable-action" in out


def test_fix_offline_with_pin_fixture(capsys, tmp_path):
    text, pins, _ = synth.twenty_ref_fixture()
    (tmp_path / "wf.yml").write_text(text)
    (tmp_path / "pins.json").write_text(json.dumps(pins))
    assert main(["fix", "wf.yml", "--pin-fixture", "pins.json"]) == EXIT_OK
    assert (tmp_path / "wf.yml").read_text() != text


def test_corpus_offline(capsys, tmp_path):
    synth.write_corpus(tmp_path / "c", synth.mixed_corpus(n=5))
    assert main(["corpus", "c", "--out-dir", "out", "--no-plots", "--repeat", "1"]) == EXIT_OK
    assert (tmp_path / "out/report.json").exists()
