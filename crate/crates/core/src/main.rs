fn main() -> std::process::ExitCode {
    pcw_core::cli::run(std::env::args_os())
}
