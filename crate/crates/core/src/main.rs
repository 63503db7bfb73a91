fn main() -> std::process::ExitCode {
    infomsg::cli::main()
}
