import pytest

from introimmune.manifest import ENV_DIR, ManifestError, load_manifest, parse_manifest, resolve_manifest


def test_minimal_manifest():
    m = parse_manifest({"name": "tiny", "construction": "wtt",
                        "functions": {0: {"script": "identity"}},
                        "functionals": {0: {"script": "const", "value": 1}}})
    assert m.name == "tiny" and m.construction == "wtt"
    assert m.expect == {}


@pytest.mark.parametrize("data, fragment", [
    ([], "top level"),
    ({"colour": 1}, "unknown top-level"),
    ({"construction": "xyz"}, "construction must be"),
    ({"functions": [1, 2]}, "functions must map"),
    ({"functions": {-1: {"script": "identity"}}}, "functions.-1"),
    ({"functions": {0: "identity"}}, "descriptor must be a mapping"),
    ({"functions": {0: {"script": "no-such-script"}}}, "functions.0"),
    ({"functionals": {2: {"program": "jmp NOWHERE"}}}, "functionals.2"),
    ({"expect": 5}, "expect must be"),
])
def test_errors_name_their_location(data, fragment):
    with pytest.raises(ManifestError, match=fragment.replace(".", r"\.")):
        parse_manifest(data, "bad.yaml")


def test_yaml_error_reports_line_and_column(tmp_path):
    path = tmp_path / "broken.yaml"
    path.write_text("name: x\nfunctions: {0: {script: identity}\n")
    with pytest.raises(ManifestError, match=r"broken\.yaml:\d+:\d+: YAML syntax error"):
        load_manifest(path)


def test_missing_file(tmp_path):
    with pytest.raises(ManifestError, match="cannot read"):
        load_manifest(tmp_path / "absent.yaml")
    with pytest.raises(ManifestError, match="no such manifest"):
        resolve_manifest("definitely-not-a-pack")


def test_resolution_order(tmp_path, monkeypatch):
    (tmp_path / "mine.yaml").write_text("name: mine\nconstruction: q\n")
    monkeypatch.setenv(ENV_DIR, str(tmp_path))
    assert resolve_manifest("mine") == tmp_path / "mine.yaml"
    assert load_manifest(resolve_manifest("mine.yaml")).construction == "q"
    assert resolve_manifest("wtt-const1").name == "wtt-const1.yaml"
    direct = tmp_path / "mine.yaml"
    assert resolve_manifest(str(direct)) == direct


def test_name_defaults_to_file_stem(tmp_path):
    path = tmp_path / "unnamed.yaml"
    path.write_text("construction: bs\n")
    assert load_manifest(path).name == "unnamed"
