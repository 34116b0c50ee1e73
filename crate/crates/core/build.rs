fn main() {
    // Symmetric tridiagonal eigensolver (dstevd) comes from the system LAPACK.
    println!("cargo:rustc-link-lib=dylib=lapack");
    println!("cargo:rustc-link-lib=dylib=blas");
}
