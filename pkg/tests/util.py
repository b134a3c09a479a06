import hashlib
from pathlib import Path


def tree_digest(root) -> dict[str, str]:
    """Relative path -> sha256 of every file under ``root``."""
    root = Path(root)
    return {
        str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


def write_lang(path, name, exts, min_commits=1):
    Path(path).write_text(
        f"language={name}\nextensions={','.join(exts)}\nmin_ecosystem_commits={min_commits}\n", encoding="utf-8"
    )
    return Path(path)
