"""A tour of the command line: gen, stats, scan, predict.

Everything the library does is reachable from the `racepred` command (or
`python -m racepred`).  This script drives it the way a shell user would,
through subprocesses and pipes.
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path


def run(*argv, stdin=None, expect=None):
    cmd = " ".join(argv)
    proc = subprocess.run(
        [sys.executable, "-m", "racepred", *argv],
        input=stdin,
        capture_output=True,
        text=True,
    )
    print(f"$ racepred {cmd}")
    for line in (proc.stdout or proc.stderr).splitlines():
        print(f"    {line}")
    if expect is not None:
        assert proc.returncode == expect, (proc.returncode, proc.stderr)
    return proc


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        trace_path = str(Path(tmp) / "random.trace")

        # a reproducible random workload: same seed, same trace, every time
        proc = run("gen", "random", "--seed", "42", "--n", "14", "--k", "3", expect=0)
        Path(trace_path).write_text(proc.stdout)

        # how big / how synchronized / which backend fits
        run("stats", "--trace", trace_path, expect=0)

        # every conflicting pair at once; exit 1 flags "found races"
        run("scan", "--trace", trace_path)

        # one pair in depth; --explain narrates the search on stderr
        verdict = json.loads(run("predict", "--trace", trace_path).stdout)
        e1, e2 = verdict["query"]["e1"], verdict["query"]["e2"]
        print(f"\n(the sidecar '# query' comment picked events {e1} and {e2})\n")
        run(
            "predict", "--trace", trace_path,
            "--e1", str(e1), "--e2", str(e2), "--explain",
        )

        # traces also flow through stdin: gen | scan
        gen = run("gen", "random", "--seed", "7", "--n", "10", expect=0)
        run("scan", "--trace", "-", stdin=gen.stdout)


if __name__ == "__main__":
    main()
