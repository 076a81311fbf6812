use clap::Parser;

fn main() {
    let cli = balm_bench::Cli::parse();
    let code = balm_bench::run(&cli, &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
