fn main() -> std::process::ExitCode {
    eprsim::cli::main()
}
