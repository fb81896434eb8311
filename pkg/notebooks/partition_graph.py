"""
Partition graph and block size
==============================

The block size decides how finely each stage is cut. Small blocks mean many
partitions and many edges; a block as large as the state collapses every
stage to a single partition.
"""

from pathlib import Path

from incqsim.qasm import load, parse_file

SAMPLE = Path(__file__).resolve().parent.parent / "samples" / "listing1.qasm"
program = parse_file(SAMPLE)

for block_size in (2, 4, 8, 32):
    sim = load(program, block_size=block_size, threads=1)
    g = sim.graph
    print(f"B={block_size:2d}: {len(g.nodes()):3d} nodes, {len(g.edges()):3d} edges")

###############################################################################
# DOT text for B=4. Paste it into any Graphviz viewer.

sim = load(program, block_size=4, threads=1)
print(sim.dump_graph())
