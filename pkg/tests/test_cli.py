import json
import subprocess
import sys

import pytest

from fairlens.cli import main
from fairlens.corpus import dump_hypotheses, dump_manifest
from synth import planted_corpus


def _write_corpus(tmp_path, speakers=20, rates=None):
    instances, hyps = planted_corpus(rates or {"female": 0.1, "male": 0.3}, speakers_per_group=speakers,
                                     utterances_per_speaker=3, categories=("ES", "Radio"))
    dump_manifest(instances, tmp_path / "m.tsv")
    dump_hypotheses(hyps, tmp_path / "h.jsonl")
    return tmp_path / "m.tsv", tmp_path / "h.jsonl"


def test_eval_writes_reports(tmp_path):
    m, h = _write_corpus(tmp_path)
    out, md = tmp_path / "r.json", tmp_path / "r.md"
    code = main(["eval", "--manifest", str(m), "--hypotheses", str(h), "--category-by", "show_type",
                 "--min-group", "10", "--metrics", "wer,cer", "--out", str(out), "--markdown", str(md)])
    assert code == 0
    report = json.loads(out.read_text())
    assert report["categories"] == ["ES", "Radio", "all"]
    assert report["config"]["epsilon"] == 0.25
    assert "Weighted mean WER" in md.read_text()


def test_eval_exit_codes(tmp_path):
    m, h = _write_corpus(tmp_path, speakers=3)
    assert main(["eval", "--manifest", str(m), "--hypotheses", str(h), "--out", str(tmp_path / "r.json")]) == 3
    bad = tmp_path / "bad.tsv"
    bad.write_text("instance_id\tspeaker_id\nx\ty\n")
    assert main(["eval", "--manifest", str(bad), "--hypotheses", str(h), "--out", str(tmp_path / "r.json")]) == 2
    assert main(["eval", "--manifest", str(m), "--hypotheses", str(h), "--epsilon", "-1"]) == 2


def test_normalize_subcommand():
    proc = subprocess.run(
        [sys.executable, "-m", "fairlens", "normalize", "--remove-diacritics"],
        input="Hallo, Wereld!\ncafé  [muziek] z'n\n", capture_output=True, text=True, check=True,
    )
    assert proc.stdout == "hallo wereld\ncafe z'n\n"


def test_stats_subcommand(tmp_path, capsys):
    rows = []
    for k in range(30):
        rows.append({"group": "female", "speaker_id": f"f{k}", "value": 0.10 + 0.001 * (k % 7)})
        rows.append({"group": "male", "speaker_id": f"m{k}", "value": 0.30 + 0.002 * (k % 5)})
    rows.append({"group": "male", "speaker_id": "m0", "value": 0.9, "weight": 0.0001})
    p = tmp_path / "s.jsonl"
    p.write_text("".join(json.dumps(r) + "\n" for r in rows))
    assert main(["stats", str(p)]) == 0
    trace = json.loads(capsys.readouterr().out)
    assert trace["groups"] == ["female", "male"] and trace["sizes"] == [30, 30]
    assert trace["final"]["p_value"] < 0.001 and trace["significance_stars"] == "***"
    p.write_text('{"group": "a", "speaker_id": "x", "value": 1}\n')
    assert main(["stats", str(p)]) == 3
    p.write_text('{"group": "a", "value": 1}\n')
    assert main(["stats", str(p)]) == 2


def test_segment_plan_subcommand(tmp_path, capsys):
    p = tmp_path / "turns.jsonl"
    p.write_text('{"speaker_id": "s1", "start_s": 10.0, "end_s": 52.0}\n{"speaker_id": "s2", "start_s": 52.0, "end_s": 60.0}\n')
    assert main(["segment-plan", str(p)]) == 0
    rows = [json.loads(ln) for ln in capsys.readouterr().out.splitlines()]
    assert [(r["speaker_id"], r["start_s"], r["end_s"]) for r in rows] == [
        ("s1", 10.0, 31.0), ("s1", 31.0, 52.0), ("s2", 52.0, 60.0)
    ]
    p.write_text('{"speaker_id": "s1", "start_s": 5, "end_s": 1}\n')
    assert main(["segment-plan", str(p)]) == 2


def test_transcribe_subcommand(tmp_path):
    script = tmp_path / "asr.py"
    script.write_text("import sys\nprint(open(sys.argv[1]).read())\n")
    audio = tmp_path / "a.txt"
    audio.write_text("Hallo daar")
    (tmp_path / "m.jsonl").write_text(json.dumps(
        {"instance_id": "u1", "speaker_id": "s", "reference": "hallo daar", "gender": "male", "audio_path": str(audio)}
    ) + "\n")
    out = tmp_path / "h.jsonl"
    code = main(["transcribe", "--manifest", str(tmp_path / "m.jsonl"), "--command",
                 f"{sys.executable} {script}", "--model-id", "ext", "--out", str(out)])
    assert code == 0
    assert json.loads(out.read_text()) == {"instance_id": "u1", "model_id": "ext", "text": "Hallo daar"}
