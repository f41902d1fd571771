//! Binary entry point: argument parsing and exit-code mapping live in
//! `ptcm::sim::cli`.

fn main() {
    std::process::exit(ptcm::sim::cli(std::env::args_os()));
}
