import pytest

from tvdlab.storage import FileSystemStore, InMemoryStore, dumps_json, get_store, init_store


def test_dumps_json_is_stable():
    assert dumps_json({"b": 1, "a": [1, 2]}) == '{\n  "a": [\n    1,\n    2\n  ],\n  "b": 1\n}\n'


def test_in_memory_store():
    store = InMemoryStore()
    store.write_json("reports/x.json", {"pass": True})
    assert store.exists("reports/x.json")
    assert store.read_json("reports/x.json") == {"pass": True}
    assert store.list("reports/") == ["reports/x.json"]
    with pytest.raises(FileNotFoundError):
        store.read_text("missing.txt")


def test_file_system_store(tmp_path):
    store = FileSystemStore(tmp_path / "out")
    store.write_text("metrics/a.csv", "step\n0\n")
    store.write_text("metrics/a.csv", "step\n1\n")
    assert store.read_text("metrics/a.csv") == "step\n1\n"
    assert store.list() == ["metrics/a.csv"]
    assert not store.exists("metrics/a.csv.tmp")


def test_init_store_switches_global(tmp_path):
    assert isinstance(init_store(), InMemoryStore)
    store = init_store(str(tmp_path))
    assert isinstance(store, FileSystemStore)
    assert get_store() is store
    init_store()
