import subprocess
import sys

import pytest

from headparse.cli import main
from headparse.corpus import Treebank, conll_string, read_conll
from headparse.decoders import is_projective
from conftest import THREE_SENTENCES, make_sentence
from test_evaluation import PREDICTED

TRAIN_FLAGS = ["--dim", "6", "--word-dim", "6", "--tag-dim", "3", "--epochs", "2", "--batch", "8", "--seed", "5"]


@pytest.fixture(scope="module")
def files(tmp_path_factory, toy_treebank):
    d = tmp_path_factory.mktemp("cli")
    (d / "train.conll").write_text(conll_string(toy_treebank[:30]), encoding="utf-8")
    (d / "dev.conll").write_text(conll_string(toy_treebank[30:]), encoding="utf-8")
    (d / "gold3.conll").write_text(THREE_SENTENCES, encoding="utf-8")
    (d / "pred3.conll").write_text(PREDICTED, encoding="utf-8")
    unlabeled = THREE_SENTENCES.replace("\tdet\t", "\t_\t")
    (d / "unlabeled.conll").write_text(unlabeled, encoding="utf-8")
    model = d / "model.bin"
    assert main(["train", "--train", str(d / "train.conll"), "--dev", str(d / "dev.conll"), "--out", str(model),
                 "--labeled", "--label-epochs", "2", "--log", str(d / "log.tsv")] + TRAIN_FLAGS) == 0
    return d


def run(args, capsys):
    code = main(args)
    out, err = capsys.readouterr()
    return code, out, err


def test_missing_train_is_usage_error():
    proc = subprocess.run([sys.executable, "-m", "headparse.cli", "train", "--out", "x.bin"],
                          capture_output=True, text=True)
    assert proc.returncode == 2
    assert "--train" in proc.stderr
    assert proc.stdout == ""


def test_train_writes_model_and_log(files):
    assert (files / "model.bin").read_bytes().startswith(b"HEADPRS\x00")
    lines = (files / "log.tsv").read_text().splitlines()
    assert len(lines) == 2 and lines[0].startswith("1\t")


def test_train_is_byte_identical_across_runs(files, capsys):
    outs = []
    for k in range(2):
        out = files / f"again{k}.bin"
        code, _, _ = run(["train", "--train", str(files / "train.conll"), "--dev", str(files / "dev.conll"),
                          "--out", str(out)] + TRAIN_FLAGS, capsys)
        assert code == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_labeled_on_unlabeled_data_fails(files, capsys):
    code, out, err = run(["train", "--train", str(files / "unlabeled.conll"), "--out", str(files / "u.bin"),
                          "--labeled"] + TRAIN_FLAGS, capsys)
    assert code == 1
    assert "no DEPREL labels" in err and out == ""


def test_missing_input_file(files, capsys):
    code, out, err = run(["stats", "--input", str(files / "nope.conll")], capsys)
    assert code == 1 and "cannot read" in err and out == ""


def test_parse_writes_conll_and_summary(files, capsys):
    code, out, err = run(["parse", "--model", str(files / "model.bin"), "--input", str(files / "dev.conll")], capsys)
    assert code == 0
    parsed = read_conll(out)
    gold = read_conll((files / "dev.conll").read_text())
    assert [s.forms for s in parsed] == [s.forms for s in gold]
    assert all(s.is_annotated and s.is_labeled for s in parsed)
    assert "tree_before=" in err and "tree_after=100.0" in err


def test_parse_projective_mode_output_is_projective(files, capsys):
    code, out, err = run(["parse", "--model", str(files / "model.bin"), "--input", str(files / "dev.conll"),
                          "--mode", "projective"], capsys)
    assert code == 0
    assert all(is_projective(s.heads) for s in read_conll(out))
    assert "proj_after=100.0" in err


def test_parse_no_repair_matches_repair_on_tree_outputs(files, capsys):
    args = ["parse", "--model", str(files / "model.bin"), "--input", str(files / "dev.conll")]
    _, repaired, _ = run(args, capsys)
    _, raw, _ = run(args + ["--no-repair"], capsys)
    from headparse.decoders import is_tree
    for r, g in zip(read_conll(repaired), read_conll(raw)):
        if is_tree(g.heads):
            assert r.heads == g.heads


def test_parse_thread_count_independent(files, capsys):
    args = ["parse", "--model", str(files / "model.bin"), "--input", str(files / "dev.conll")]
    _, one, _ = run(args + ["--threads", "1"], capsys)
    _, four, _ = run(args + ["--threads", "4"], capsys)
    assert one == four


def test_parse_output_file_and_dump(files, capsys):
    out_path, dump = files / "out.conll", files / "dist.tsv"
    code, out, _ = run(["parse", "--model", str(files / "model.bin"), "--input", str(files / "gold3.conll"),
                        "--output", str(out_path), "--dump-distributions", str(dump)], capsys)
    assert code == 0 and out == ""
    assert len(read_conll(out_path.read_text())) == 3
    text = dump.read_text()
    assert text.count("# sentence") == 3


def test_parse_dimension_mismatch(files, capsys):
    code, _, err = run(["parse", "--model", str(files / "model.bin"), "--input", str(files / "dev.conll"),
                        "--dim", "300"], capsys)
    assert code == 1 and "does not match" in err


def test_parse_rejects_non_model(files, capsys):
    code, _, err = run(["parse", "--model", str(files / "log.tsv"), "--input", str(files / "dev.conll")], capsys)
    assert code == 1 and "error" in err


def test_eval_identity(files, capsys):
    code, out, _ = run(["eval", "--gold", str(files / "dev.conll"), "--pred", str(files / "dev.conll"),
                        "--machine"], capsys)
    assert code == 0
    kv = dict(line.split("=") for line in out.splitlines())
    assert kv["uas"] == kv["las"] == kv["uem"] == "100.00"


def test_eval_fixture_and_bins(files, capsys):
    code, out, _ = run(["eval", "--gold", str(files / "gold3.conll"), "--pred", str(files / "pred3.conll")], capsys)
    assert code == 0 and "(7 / 9)" in out and "(6 / 9)" in out
    code, out, _ = run(["eval", "--gold", str(files / "dev.conll"), "--pred", str(files / "dev.conll"),
                        "--bins", "10"], capsys)
    table = out[out.index("max_length"):].strip().splitlines()
    assert len(table) == 1 + 10


def test_eval_custom_punct_set(files, capsys):
    _, out, _ = run(["eval", "--gold", str(files / "gold3.conll"), "--pred", str(files / "pred3.conll"),
                     "--punct-set", "", "--machine"], capsys)
    assert "tokens=11" in out


def test_eval_mismatch(files, capsys):
    code, _, err = run(["eval", "--gold", str(files / "gold3.conll"), "--pred", str(files / "dev.conll")], capsys)
    assert code == 1 and "sentences" in err


def test_stats(tmp_path, capsys):
    proj = tmp_path / "p.conll"
    proj.write_text(conll_string(Treebank((make_sentence([2, 0, 2]), make_sentence([0])))))
    code, out, _ = run(["stats", "--input", str(proj)], capsys)
    assert code == 0 and out.splitlines()[1] == "2\t100.0"
    mixed = tmp_path / "m.conll"
    mixed.write_text(conll_string(Treebank(tuple(make_sentence(h) for h in ([0], [2, 0], [0, 1, 2], [3, 4, 0, 3])))))
    _, out, _ = run(["stats", "--input", str(mixed)], capsys)
    assert out.splitlines()[1] == "4\t75.0"


def test_stats_unannotated_input(tmp_path, capsys):
    p = tmp_path / "u.conll"
    p.write_text("1\tdog\t_\tNN\tNN\t_\t_\t_\t_\t_\n")
    code, out, err = run(["stats", "--input", str(p)], capsys)
    assert code == 1 and "no gold heads" in err and out == ""
