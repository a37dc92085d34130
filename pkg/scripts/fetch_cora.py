"""Place the LINQS Cora files (cora.content, cora.cites) under data/cora.

The files ship inside the ``pgl`` wheel, which a pip mirror can usually
serve when the original host is unreachable. Only the two data files and
the README are extracted; nothing is installed.
"""

import argparse
import subprocess
import sys
import tempfile
import zipfile
from pathlib import Path

MEMBERS = ("cora.content", "cora.cites", "README")


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "data" / "cora"))
    p.add_argument("--wheel", help="use an already downloaded pgl wheel")
    args = p.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        wheel = args.wheel
        if wheel is None:
            subprocess.run([sys.executable, "-m", "pip", "download", "--no-deps", "-q", "-d", tmp, "pgl==2.2.6"],
                           check=True)
            wheel = next(Path(tmp).glob("pgl-*.whl"))
        with zipfile.ZipFile(wheel) as z:
            for name in MEMBERS:
                (out / name).write_bytes(z.read(f"pgl/data/cora/{name}"))
    print(f"wrote {', '.join(MEMBERS)} to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
