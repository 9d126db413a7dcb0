import os
from setuptools import find_packages, setup

from odiprobe import __version__


with open(os.path.join(os.path.dirname(__file__), 'README.md'), encoding='utf-8') as readme:
    README = readme.read()

os.chdir(os.path.normpath(os.path.join(os.path.abspath(__file__), os.pardir)))

setup(
    name='odiprobe',
    version=__version__,
    packages=find_packages(exclude=['tests']),
    include_package_data=True,
    install_requires=[
        'attrs',
        'pyyaml',
        'munch',
        'numpy',
        'torch',
        'tokenizers',
        'transformers',
    ],
    extras_require={
        'test': [
            'pytest',
            'hypothesis',
        ],
    },
    entry_points={
        'console_scripts': [
            'odiprobe=odiprobe.cli:main',
        ],
    },
    license='AGPL-3.0',
    description='Cloze probing and continual pre-training of masked language models on NHTSA vehicle complaints',
    long_description=README,
    long_description_content_type='text/markdown',
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: GNU Affero General Public License v3',
        'Operating System :: OS Independent',
        'Programming Language :: Python',
        'Programming Language :: Python :: 3',
        'Topic :: Scientific/Engineering :: Artificial Intelligence',
        'Topic :: Text Processing :: Linguistic',
    ],
    keywords='nlp, masked language model, bert, domain adaptation, vehicle complaints',
)
