//! Criterion benchmarks for the special functions, the sieve and operator
//! assembly; run with `cargo bench -p tauberlab-bench`.
