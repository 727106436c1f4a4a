"""How many pairwise keys does a node need?

A cluster of n nodes hands each node s keys.  Treating shared-key
discovery as a birthday collision, two nodes share a key with probability
1 - (1 - 1/n)**C(s, 2).  This script tabulates the smallest s for a few
targets and cluster sizes, then checks the exact collision formula on the
classic 23-people example.
"""
from sensorkeys import exact_birthday_probability, required_share_count

sizes = (50, 100, 250, 290, 500, 1000)
targets = (0.2, 0.5, 0.9, 0.99)

print("smallest s per node")
print("n".rjust(6) + "".join(f"p={p:<6}".rjust(9) for p in targets))
for n in sizes:
    print(f"{n:6d}" + "".join(f"{required_share_count(p, n):9d}" for p in targets))

print()
print(f"23 people, 365 days: collision probability {exact_birthday_probability(23, 365):.6f}")

# the ring grows roughly like sqrt(n), so doubling the cluster costs ~41% more keys
for n in (250, 500, 1000):
    print(f"n={n:5d}: s={required_share_count(0.9, n)}")
