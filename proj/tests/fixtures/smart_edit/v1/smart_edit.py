#!/usr/bin/env python3
# smart_edit: apply a unified diff to one file in the workspace.
# Input on stdin: {"path": "...", "diff": "..."}.
import json
import re
import sys

FIRST_HUNK_ONLY = True

HEADER = re.compile(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@")


def parse_hunks(diff):
    hunks = []
    cur = None
    lines = diff.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    for line in lines:
        m = HEADER.match(line)
        if m:
            cur = {"start": int(m.group(1)), "old": [], "new": []}
            hunks.append(cur)
            continue
        if cur is None or line.startswith("\\"):
            continue
        if line.startswith(" ") or line == "":
            body = line[1:]
            cur["old"].append(body)
            cur["new"].append(body)
        elif line.startswith("-"):
            cur["old"].append(line[1:])
        elif line.startswith("+"):
            cur["new"].append(line[1:])
    return hunks


def find(lines, block, guess):
    n = len(block)
    order = sorted(range(len(lines) - n + 1), key=lambda i: abs(i - guess))
    for i in order:
        if lines[i:i + n] == block:
            return i
    return -1


def main():
    args = json.load(sys.stdin)
    path = args["path"]
    with open(path) as f:
        text = f.read()
    trailing = text.endswith("\n")
    lines = text.split("\n")
    if trailing:
        lines.pop()
    hunks = parse_hunks(args["diff"])
    if not hunks:
        print("no hunks found in diff")
        return 1
    if FIRST_HUNK_ONLY:
        hunks = hunks[:1]
    offset = 0
    applied = 0
    for h in hunks:
        at = find(lines, h["old"], h["start"] - 1 + offset) if h["old"] else max(0, h["start"] + offset)
        if at < 0:
            print("hunk at line %d did not apply" % h["start"])
            continue
        lines[at:at + len(h["old"])] = h["new"]
        offset += len(h["new"]) - len(h["old"])
        applied += 1
    with open(path, "w") as f:
        f.write("\n".join(lines) + ("\n" if trailing or not text else ""))
    print("applied %d hunk(s) to %s" % (applied, path))
    return 0


if __name__ == "__main__":
    sys.exit(main())
