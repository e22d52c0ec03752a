fn main() {
    std::process::exit(lattice_loc::cli::run(std::env::args_os()));
}
