"""Print an event-kind histogram and the digest for an ndjson run log.

Usage: python3 demos/log_stats.py <log.ndjson>
"""
import collections
import json
import sys

from sitefleet.service_api import replay


def main(argv):
    if len(argv) != 2:
        print(__doc__.strip())
        return 2
    path = argv[1]
    counts = collections.Counter()
    sources = collections.Counter()
    with open(path) as fh:
        for line in fh:
            rec = json.loads(line)
            counts[rec["kind"]] += 1
            sources[rec["source"]] += 1
    state, digest = replay(path)
    width = max(len(k) for k in counts)
    for kind, n in counts.most_common():
        print(f"{kind:<{width}}  {n}")
    print(f"\nsources: {dict(sources)}")
    print(f"sim_time {state['sim_time']}  digest {digest[:16]}...")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
