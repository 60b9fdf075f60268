"""
Benchmark kernels
=================

Each paired kernel has a scalar-loop ``base`` variant and a bulk ``opt``
variant with the same checksum. The parallel kernels take a thread count
and give the same checksum for any count.
"""

from powerprof.benchmarks import PAIRED_KERNELS, KernelSpec, run_kernel

# small sizes keep this quick; `powerprof bench` uses longer defaults
sizes = {"copy": 20_000, "strided_sum": 300, "nested_loops": 150, "refactor": 150}
for kernel in PAIRED_KERNELS:
    base = run_kernel(KernelSpec(kernel, "base", sizes[kernel], repeat=3))
    opt = run_kernel(KernelSpec(kernel, "opt", sizes[kernel], repeat=3))
    print(f"{kernel:13s} base {base.wall_time:.4f}s  opt {opt.wall_time:.4f}s  "
          f"same checksum: {base.checksum == opt.checksum}")

for kernel, n in [("sortstr", 100_000), ("dijkstra", 400), ("koshi", 32), ("riemann", 10**7)]:
    sums = {p: run_kernel(KernelSpec(kernel, size=n, threads=p)).checksum for p in (1, 2, 4)}
    print(f"{kernel:9s} n={n:<9d} checksums for p=1,2,4: {sorted(set(sums.values()))}")

# koshi integrates y' = My with a row-stochastic M, so every component
# tracks e at t = 1
print("koshi y(1):", run_kernel(KernelSpec("koshi", size=4, threads=2)).output)
