fn main() {
    std::process::exit(pmu_recovery::cli::run(std::env::args_os()));
}
