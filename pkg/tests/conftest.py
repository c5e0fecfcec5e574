import os

# The sweep is dominated by many small factorizations; threaded BLAS adds
# synchronization cost (and on constrained CI boxes, pathological stalls)
# without any useful parallelism at these sizes. Must be set before numpy
# loads its BLAS.
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("MKL_NUM_THREADS", "1")
