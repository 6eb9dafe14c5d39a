fn main() -> std::process::ExitCode {
    gigastore::cli::run(std::env::args_os())
}
