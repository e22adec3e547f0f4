fn main() -> std::process::ExitCode {
    coinvest::cli::main()
}
