// ndarray-linalg is used without a bundled BLAS backend (the *-src build
// scripts are not usable offline); link the system OpenBLAS, which provides
// both BLAS and LAPACK symbols.
fn main() {
    println!("cargo:rustc-link-lib=dylib=openblas");
}
