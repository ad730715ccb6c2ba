"""
Tests for the sftkit command line
"""

import json

import pytest

from main import main


def last_json(text: str):
    lines = [line for line in text.splitlines() if line.startswith("{")]
    return json.loads(lines[-1])


class TestCommands:
    """Subcommands end to end"""

    def test_count(self, capsys):
        """Chess has two 2-blocks"""
        assert main(["count", "--sft", "chess", "--n", "2"]) == 0
        assert capsys.readouterr().out.strip() == '{"n":2,"count":2}'

    def test_count_to_file(self, tmp_path):
        """--out writes the same JSON to a file"""
        out = tmp_path / "count.json"
        assert main(["count", "--sft", "even", "--n", "2", "--out", str(out)]) == 0
        assert json.loads(out.read_text(encoding="utf-8")) == {"n": 2, "count": 7}

    def test_distort_chain(self, capsys):
        """Operators apply in command-line order"""
        assert main(["distort", "--sft", "trivial", "--r", "1", "--rho"]) == 0
        data = json.loads(capsys.readouterr().out)
        assert data["derivation"]["chain"] == ["d_r:1", "rho"]
        assert data["name"] == "rho(d1(trivial))"

    def test_complete_t(self, tmp_path, capsys):
        """Block completion reads a rows file"""
        block = tmp_path / "block.json"
        block.write_text(json.dumps({"rows": ["↓"]}, ensure_ascii=False), encoding="utf-8")
        assert main(["delta", "complete-t", "--in", str(block)]) == 0
        data = json.loads(capsys.readouterr().out)
        assert data["offset"] == [0, 1]
        assert data["curves"] == 3

    def test_render(self, tmp_path):
        """Rendering writes an SVG document"""
        block = tmp_path / "block.json"
        block.write_text(json.dumps({"rows": ["→↓", "↓→"]}, ensure_ascii=False), encoding="utf-8")
        svg = tmp_path / "block.svg"
        assert main(["render", "--in", str(block), "--out", str(svg)]) == 0
        assert "<svg" in svg.read_text(encoding="utf-8")

    def test_glue_report(self, capsys):
        """The gap report carries pair count and class hint"""
        assert main(["glue", "--sft", "even", "--n", "2", "--window", "6"]) == 0
        data = json.loads(capsys.readouterr().out)
        assert (data["min_uniform_gap"], data["pair_count"], data["class_hint"]) == (1, 49, "constant")

    def test_glue_net(self, tmp_path, capsys):
        """--net reports the lattice along which a pair glues"""
        black = tmp_path / "black.json"
        black.write_text(json.dumps({"rows": ["■"]}, ensure_ascii=False), encoding="utf-8")
        assert main(["glue", "--sft", "chess", "--window", "4", "--pair", str(black), str(black), "--net"]) == 0
        assert json.loads(capsys.readouterr().out) == {"anchor": [0, 0], "period": 2}

    def test_refute_period(self, capsys):
        """Chess tori up to side 2"""
        assert main(["refute-period", "--sft", "chess", "--max", "2"]) == 0
        assert [2, 2] in json.loads(capsys.readouterr().out)["periods"]


class TestErrors:
    """Exit codes and error payloads"""

    def test_unknown_command(self):
        """Usage errors exit with 2"""
        assert main(["nope"]) == 2

    def test_bad_threads(self):
        """Thread counts must be positive"""
        assert main(["--threads", "0", "count", "--sft", "chess", "--n", "1"]) == 2

    def test_unknown_sft(self, capsys):
        """Domain errors exit with 1 and a JSON payload on stderr"""
        assert main(["count", "--sft", "nope", "--n", "2"]) == 1
        payload = last_json(capsys.readouterr().err)
        assert payload["error"]["code"] == "DEFINITION_ERROR"

    def test_render_needs_out(self, tmp_path, capsys):
        """render refuses to print SVG to stdout"""
        block = tmp_path / "block.json"
        block.write_text(json.dumps({"rows": ["→"]}, ensure_ascii=False), encoding="utf-8")
        assert main(["render", "--in", str(block)]) == 1
        assert last_json(capsys.readouterr().err)["error"]["code"] == "DEFINITION_ERROR"

    def test_missing_input_file(self, tmp_path, capsys):
        """A missing pattern file is reported, not raised"""
        assert main(["delta", "curves", "--in", str(tmp_path / "absent.json")]) == 1
        assert last_json(capsys.readouterr().err)["error"]["code"] in ("FILE_NOT_FOUND", "DEFINITION_ERROR")

    def test_distort_without_operator(self, capsys):
        """distort needs at least one operator"""
        assert main(["distort", "--sft", "even"]) == 1


if __name__ == "__main__":
    pytest.main([__file__])
