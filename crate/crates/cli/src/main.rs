use hadperturb_cli::{parse, run};

fn main() {
    let code = match parse(std::env::args_os()) {
        Ok(cfg) => run(&cfg),
        Err((msg, code)) => {
            if code == 0 {
                print!("{msg}");
            } else {
                eprint!("{msg}");
            }
            code
        }
    };
    std::process::exit(code);
}
