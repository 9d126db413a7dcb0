import argparse

import munch

import odiprobe.config


def main(argv=None):
    parser = argparse.ArgumentParser(description='Prints the effective pipeline configuration', prog='odiprobe.utils.config')

    parser.add_argument('--config', required=False, default=None, help='YAML config to merge over the defaults')
    parser.add_argument('--format', required=False, default='yaml', choices=['json', 'yaml'], help='Output format, default: YAML')
    parser.add_argument('--indent', required=False, default=4, type=int, help='Indent size, default: 4')

    args = parser.parse_args(argv)

    cfg = odiprobe.config.load_config(args.config)

    if args.format == 'json':
        serialized = munch.Munch.toJSON(cfg, indent=args.indent, sort_keys=True)
    else:
        serialized = munch.Munch.toYAML(cfg, indent=args.indent)

    print(serialized)
    print('# config_hash: {}'.format(odiprobe.config.config_hash(cfg)))
    return 0


if __name__ == '__main__':
    main()
