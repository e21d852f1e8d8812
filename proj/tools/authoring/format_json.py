"""Pretty-print JSON with numeric arrays kept on one line."""
import json
import re
import sys


def dumps(obj):
    text = json.dumps(obj, indent=2)
    return re.sub(r"\[\s+([-0-9.eE,\s]+?)\s+\]",
                  lambda m: "[" + ", ".join(x.strip() for x in m.group(1).split(",")) + "]",
                  text) + "\n"


if __name__ == "__main__":
    for path in sys.argv[1:]:
        with open(path) as f:
            obj = json.load(f)
        with open(path, "w") as f:
            f.write(dumps(obj))
