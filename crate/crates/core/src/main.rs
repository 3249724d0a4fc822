fn main() -> std::process::ExitCode {
    coopcache::harness::cli::main()
}
