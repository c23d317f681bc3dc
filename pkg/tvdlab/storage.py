import abc
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

logger = logging.getLogger(__name__)


def dumps_json(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


class ArtifactStore(abc.ABC):
    """Write-mostly store for run artifacts addressed by relative paths."""

    @abc.abstractmethod
    def write_text(self, relpath: str, text: str):
        pass

    @abc.abstractmethod
    def read_text(self, relpath: str) -> str:
        pass

    @abc.abstractmethod
    def exists(self, relpath: str) -> bool:
        pass

    @abc.abstractmethod
    def list(self, prefix: str = "") -> List[str]:
        pass

    def write_json(self, relpath: str, obj: Any):
        self.write_text(relpath, dumps_json(obj))

    def read_json(self, relpath: str) -> Any:
        return json.loads(self.read_text(relpath))


class InMemoryStore(ArtifactStore):
    def __init__(self):
        self.files: Dict[str, str] = {}

    def write_text(self, relpath: str, text: str):
        self.files[relpath] = text

    def read_text(self, relpath: str) -> str:
        if relpath not in self.files:
            raise FileNotFoundError(relpath)
        return self.files[relpath]

    def exists(self, relpath: str) -> bool:
        return relpath in self.files

    def list(self, prefix: str = "") -> List[str]:
        return sorted(p for p in self.files if p.startswith(prefix))


class FileSystemStore(ArtifactStore):
    """Artifacts as UTF-8 files under a root directory."""

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        logger.debug("FileSystemStore at %s", self.root)

    def _path(self, relpath: str) -> Path:
        return self.root / relpath

    def write_text(self, relpath: str, text: str):
        path = self._path(relpath)
        path.parent.mkdir(parents=True, exist_ok=True)
        # atomic replace
        tmp = path.with_name(path.name + ".tmp")
        with open(tmp, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        tmp.replace(path)

    def read_text(self, relpath: str) -> str:
        return self._path(relpath).read_text(encoding="utf-8")

    def exists(self, relpath: str) -> bool:
        return self._path(relpath).exists()

    def list(self, prefix: str = "") -> List[str]:
        found = [p.relative_to(self.root).as_posix() for p in self.root.rglob("*") if p.is_file()]
        return sorted(p for p in found if p.startswith(prefix))


# Global store instance
store: ArtifactStore = InMemoryStore()


def get_store() -> ArtifactStore:
    return store


def init_store(root: Optional[str] = None) -> ArtifactStore:
    """Select the global store: a directory when `root` is given, memory otherwise."""
    global store
    store = FileSystemStore(root) if root is not None else InMemoryStore()
    return store
